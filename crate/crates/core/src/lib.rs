//! Intrinsically motivated deep Q-learning for social interaction: a
//! from-scratch tensor substrate, the Pnet/Qnet pair, a simulated social
//! environment, replay, training and evaluation.

pub mod evalkit;
pub mod intrinsic;
pub mod networks;
pub mod replay;
pub mod socialsim;
pub mod tensorcore;
pub mod trainer;
