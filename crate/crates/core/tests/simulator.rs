mod common;

use common::simulator;
use imrl::socialsim::SimConfig;

#[test]
fn oracle_is_consistent_over_the_grid() {
    simulator::oracle_consistency(&SimConfig::default()).assert();
}

#[test]
fn event_frequencies_match_the_table() {
    simulator::emission_frequencies(&SimConfig::default(), 1000).assert();
}

#[test]
fn oracle_handshake_ratio_matches_the_table() {
    simulator::oracle_handshake_ratio(&SimConfig::default(), 20, 600).assert();
}
