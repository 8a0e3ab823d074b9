//! Network files on top of the layer checkpoint format. The preamble names
//! the preset, the role, and how the stored layers split into chains.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use super::{Architecture, NetworkError, PNetwork, QNetwork, QStream};
use crate::tensorcore::{decode_checkpoint, encode_checkpoint, ChainBuilder, Layer, Sequential};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Pnet,
    QnetGray,
    QnetDepth,
    /// Both target streams, grayscale first.
    Targets,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Pnet, Role::QnetGray, Role::QnetDepth, Role::Targets];

    pub fn name(self) -> &'static str {
        match self {
            Role::Pnet => "pnet",
            Role::QnetGray => "qnet-gray",
            Role::QnetDepth => "qnet-depth",
            Role::Targets => "targets",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.net", self.name())
    }

    fn plans(self, arch: &Architecture) -> Vec<ChainBuilder> {
        match self {
            Role::Pnet => vec![arch.trunk(), arch.action_encoder(), arch.pnet_head()],
            Role::QnetGray | Role::QnetDepth => vec![arch.q_stream()],
            Role::Targets => vec![arch.q_stream(), arch.q_stream()],
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown role `{s}`"))
    }
}

pub fn encode_chains(arch: &Architecture, role: Role, chains: &[&Sequential]) -> Vec<u8> {
    let split = chains
        .iter()
        .map(|c| c.layers().len().to_string())
        .collect::<Vec<_>>()
        .join(",");
    let layers: Vec<Layer> = chains.iter().flat_map(|c| c.layers().iter().cloned()).collect();
    encode_checkpoint(
        &[("preset", arch.name), ("role", role.name()), ("split", &split)],
        &layers,
    )
}

/// Decodes a network file and checks it against its preset. Returns the
/// architecture, the role, and the chains in stored order.
pub fn decode_chains(bytes: &[u8]) -> Result<(Architecture, Role, Vec<Sequential>), NetworkError> {
    let file = decode_checkpoint(bytes)?;
    let field = |key: &str| {
        file.preamble_value(key)
            .ok_or_else(|| NetworkError::Layout(format!("missing `{key}` in preamble")))
    };
    let preset = field("preset")?.to_string();
    let arch = Architecture::by_name(&preset)
        .ok_or_else(|| NetworkError::Layout(format!("unknown preset `{preset}`")))?;
    let role: Role = field("role")?.parse().map_err(NetworkError::Layout)?;
    let split = field("split")?
        .split(',')
        .map(|s| s.parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| NetworkError::Layout("malformed `split`".into()))?;
    let plans = role.plans(&arch);
    if split.len() != plans.len() || split.iter().sum::<usize>() != file.layers.len() {
        return Err(NetworkError::Layout(format!(
            "layer split {split:?} does not fit role {role}"
        )));
    }
    let mut layers = file.layers.into_iter();
    let mut chains = Vec::with_capacity(plans.len());
    for (count, plan) in split.into_iter().zip(plans) {
        let chunk: Vec<Layer> = layers.by_ref().take(count).collect();
        let expected = plan.resolve()?;
        let fits = expected.len() == chunk.len()
            && expected
                .iter()
                .zip(&chunk)
                .all(|((k, s), l)| l.kind() == *k && l.input_shape() == s.as_slice());
        if !fits {
            return Err(NetworkError::Layout(format!(
                "layers do not match the {preset} preset for role {role}"
            )));
        }
        chains.push(Sequential::from_layers(chunk)?);
    }
    Ok((arch, role, chains))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), NetworkError> {
    std::fs::write(path, bytes).map_err(|source| NetworkError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read(path: &Path) -> Result<Vec<u8>, NetworkError> {
    std::fs::read(path).map_err(|source| NetworkError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn expect_role(path: &Path, got: Role, want: Role) -> Result<(), NetworkError> {
    if got == want {
        Ok(())
    } else {
        Err(NetworkError::Layout(format!(
            "{}: expected role {want}, found {got}",
            path.display()
        )))
    }
}

/// Writes `pnet.net` into `dir`.
pub fn save_pnet(dir: &Path, net: &PNetwork) -> Result<(), NetworkError> {
    let bytes = encode_chains(net.arch(), Role::Pnet, &[net.trunk(), net.encoder(), net.head()]);
    write(&dir.join(Role::Pnet.file_name()), &bytes)
}

pub fn load_pnet(dir: &Path) -> Result<PNetwork, NetworkError> {
    let path = dir.join(Role::Pnet.file_name());
    let (arch, role, chains) = decode_chains(&read(&path)?)?;
    expect_role(&path, role, Role::Pnet)?;
    let [trunk, encoder, head]: [Sequential; 3] = chains.try_into().expect("three chains");
    PNetwork::from_parts(arch, trunk, encoder, head)
}

/// Writes `qnet-gray.net`, `qnet-depth.net` and `targets.net` into `dir`.
pub fn save_qnet(dir: &Path, net: &QNetwork) -> Result<(), NetworkError> {
    let arch = net.arch();
    write(
        &dir.join(Role::QnetGray.file_name()),
        &encode_chains(arch, Role::QnetGray, &[&net.grayscale.learning]),
    )?;
    write(
        &dir.join(Role::QnetDepth.file_name()),
        &encode_chains(arch, Role::QnetDepth, &[&net.depth.learning]),
    )?;
    write(
        &dir.join(Role::Targets.file_name()),
        &encode_chains(arch, Role::Targets, &[&net.grayscale.target, &net.depth.target]),
    )
}

pub fn load_qnet(dir: &Path) -> Result<QNetwork, NetworkError> {
    let mut parts = Vec::new();
    let mut arch = None;
    for role in [Role::QnetGray, Role::QnetDepth, Role::Targets] {
        let path = dir.join(role.file_name());
        let (a, r, chains) = decode_chains(&read(&path)?)?;
        expect_role(&path, r, role)?;
        if *arch.get_or_insert_with(|| a.clone()) != a {
            return Err(NetworkError::Layout(format!(
                "{}: preset {} differs from the other Qnet files",
                path.display(),
                a.name
            )));
        }
        parts.extend(chains);
    }
    let [gray, depth, gray_target, depth_target]: [Sequential; 4] =
        parts.try_into().expect("four chains");
    Ok(QNetwork::from_streams(
        arch.expect("at least one file"),
        QStream {
            learning: gray,
            target: gray_target,
        },
        QStream {
            learning: depth,
            target: depth_target,
        },
    ))
}
