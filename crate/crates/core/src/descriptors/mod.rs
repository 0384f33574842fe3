//! Graph descriptors and the pairwise distances computed between them.
//!
//! Four descriptor kinds are supported: NetLSD heat and wave trace
//! signatures, the Graphlet Correlation Matrix (distance: GCD), and the
//! network portrait (distance: portrait divergence). Every distance is a
//! pseudometric: zero on identical descriptors, symmetric, nonnegative, but
//! distinct graphs may share a descriptor.

pub mod gcm;
pub mod netlsd;
pub mod orbits;
pub mod portrait;
pub mod spectrum;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::budget::{BudgetExhausted, BudgetLedger};
use crate::graph::Graph;
use crate::scalar::{real, Scalar};

pub use gcm::{gcd_distance, gcm, GraphletCorrelationMatrix};
pub use netlsd::{
    heat_timestamps, netlsd_heat, netlsd_wave, wave_timestamps, HeatSignature, WaveSignature,
    SIGNATURE_LEN,
};
pub use orbits::{orbit_counts, OrbitCountMatrix, REDUCED_ORBITS};
pub use portrait::{portrait, portrait_divergence, Portrait};
pub use spectrum::{normalized_laplacian, normalized_laplacian_spectrum, symmetric_eigenvalues};

#[derive(Debug, Error)]
pub enum DescriptorError {
    #[error("eigensolver failed to converge")]
    EigenNonConvergence,
    #[error("descriptor kind mismatch: {left} vs {right}")]
    KindMismatch {
        left: DescriptorKind,
        right: DescriptorKind,
    },
    #[error(
        "unknown descriptor kind {0:?}; valid kinds: gcd, portrait-div, netlsd-heat, netlsd-wave"
    )]
    UnknownKind(String),
    #[error("malformed descriptor record: {0}")]
    Parse(String),
    #[error(transparent)]
    Budget(#[from] BudgetExhausted),
}

/// The four supported distance kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DescriptorKind {
    Gcd,
    PortraitDiv,
    NetlsdHeat,
    NetlsdWave,
}

impl DescriptorKind {
    pub const ALL: [DescriptorKind; 4] = [
        DescriptorKind::Gcd,
        DescriptorKind::PortraitDiv,
        DescriptorKind::NetlsdHeat,
        DescriptorKind::NetlsdWave,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DescriptorKind::Gcd => "gcd",
            DescriptorKind::PortraitDiv => "portrait-div",
            DescriptorKind::NetlsdHeat => "netlsd-heat",
            DescriptorKind::NetlsdWave => "netlsd-wave",
        }
    }

    /// Column header used in report tables.
    pub fn table_label(&self) -> &'static str {
        match self {
            DescriptorKind::Gcd => "GCD",
            DescriptorKind::PortraitDiv => "Portrait-div",
            DescriptorKind::NetlsdHeat => "NetLSD-heat",
            DescriptorKind::NetlsdWave => "NetLSD-wave",
        }
    }
}

impl fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DescriptorKind {
    type Err = DescriptorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gcd" => Ok(DescriptorKind::Gcd),
            "portrait-div" => Ok(DescriptorKind::PortraitDiv),
            "netlsd-heat" => Ok(DescriptorKind::NetlsdHeat),
            "netlsd-wave" => Ok(DescriptorKind::NetlsdWave),
            other => Err(DescriptorError::UnknownKind(other.to_string())),
        }
    }
}

/// Kind-tagged descriptor value.
#[derive(Clone, Debug, PartialEq)]
pub enum Descriptor<S> {
    Gcd(GraphletCorrelationMatrix<S>),
    Portrait(Portrait<S>),
    Heat(HeatSignature<S>),
    Wave(WaveSignature<S>),
}

impl<S: Scalar> Descriptor<S> {
    pub fn kind(&self) -> DescriptorKind {
        match self {
            Descriptor::Gcd(_) => DescriptorKind::Gcd,
            Descriptor::Portrait(_) => DescriptorKind::PortraitDiv,
            Descriptor::Heat(_) => DescriptorKind::NetlsdHeat,
            Descriptor::Wave(_) => DescriptorKind::NetlsdWave,
        }
    }

    /// Distance to another descriptor of the same kind.
    pub fn distance(&self, other: &Descriptor<S>) -> Result<S, DescriptorError> {
        match (self, other) {
            (Descriptor::Gcd(a), Descriptor::Gcd(b)) => Ok(gcd_distance(a, b)),
            (Descriptor::Portrait(a), Descriptor::Portrait(b)) => Ok(portrait_divergence(a, b)),
            (Descriptor::Heat(a), Descriptor::Heat(b)) => {
                Ok(netlsd::euclidean(&a.values, &b.values))
            }
            (Descriptor::Wave(a), Descriptor::Wave(b)) => {
                Ok(netlsd::euclidean(&a.values, &b.values))
            }
            (a, b) => Err(DescriptorError::KindMismatch {
                left: a.kind(),
                right: b.kind(),
            }),
        }
    }
}

/// Compute a descriptor without touching any budget ledger.
pub fn compute<S: Scalar>(
    kind: DescriptorKind,
    g: &Graph,
) -> Result<Descriptor<S>, DescriptorError> {
    Ok(match kind {
        DescriptorKind::Gcd => Descriptor::Gcd(gcm(g)),
        DescriptorKind::PortraitDiv => Descriptor::Portrait(portrait(g)),
        DescriptorKind::NetlsdHeat => Descriptor::Heat(netlsd_heat(g)?),
        DescriptorKind::NetlsdWave => Descriptor::Wave(netlsd_wave(g)?),
    })
}

/// Compute a descriptor, charging exactly one unit to the ledger.
pub fn descriptor<S: Scalar>(
    kind: DescriptorKind,
    g: &Graph,
    ledger: &BudgetLedger,
) -> Result<Descriptor<S>, DescriptorError> {
    ledger.charge()?;
    compute(kind, g)
}

/// Distance between two descriptors of the given kind.
pub fn distance<S: Scalar>(
    kind: DescriptorKind,
    a: &Descriptor<S>,
    b: &Descriptor<S>,
) -> Result<S, DescriptorError> {
    if a.kind() != kind {
        return Err(DescriptorError::KindMismatch {
            left: kind,
            right: a.kind(),
        });
    }
    a.distance(b)
}

/// One cached descriptor record: kind tag, graph id, then the payload.
/// Floats are written with 12 significant digits.
pub fn encode_record<S: Scalar>(id: usize, d: &Descriptor<S>) -> String {
    let mut out = format!("{} {}", d.kind(), id);
    match d {
        Descriptor::Heat(sig) => {
            for v in &sig.values {
                out.push_str(&format!(" {v:.11e}"));
            }
        }
        Descriptor::Wave(sig) => {
            for v in &sig.values {
                out.push_str(&format!(" {v:.11e}"));
            }
        }
        Descriptor::Gcd(m) => {
            for v in m.upper_triangle() {
                out.push_str(&format!(" {v:.11e}"));
            }
        }
        Descriptor::Portrait(p) => {
            out.push_str(&format!(" n={} pairs={}", p.n(), p.component_pairs()));
            for (l, k, b) in p.entries() {
                out.push_str(&format!(" {l}:{k}:{b}"));
            }
        }
    }
    out
}

/// Parse a record produced by [`encode_record`].
pub fn decode_record<S: Scalar>(line: &str) -> Result<(usize, Descriptor<S>), DescriptorError> {
    let mut parts = line.split_whitespace();
    let kind: DescriptorKind = parts
        .next()
        .ok_or_else(|| DescriptorError::Parse("empty record".into()))?
        .parse()?;
    let id: usize = parts
        .next()
        .ok_or_else(|| DescriptorError::Parse("missing graph id".into()))?
        .parse()
        .map_err(|e| DescriptorError::Parse(format!("bad graph id: {e}")))?;
    let parse_floats = |parts: std::str::SplitWhitespace<'_>| -> Result<Vec<S>, DescriptorError> {
        parts
            .map(|tok| {
                tok.parse::<f64>()
                    .map(real::<S>)
                    .map_err(|e| DescriptorError::Parse(format!("bad float {tok:?}: {e}")))
            })
            .collect()
    };
    let descriptor = match kind {
        DescriptorKind::NetlsdHeat => {
            let values = parse_floats(parts)?;
            if values.len() != SIGNATURE_LEN {
                return Err(DescriptorError::Parse(format!(
                    "heat signature needs {SIGNATURE_LEN} values, got {}",
                    values.len()
                )));
            }
            Descriptor::Heat(HeatSignature { values })
        }
        DescriptorKind::NetlsdWave => {
            let values = parse_floats(parts)?;
            if values.len() != SIGNATURE_LEN {
                return Err(DescriptorError::Parse(format!(
                    "wave signature needs {SIGNATURE_LEN} values, got {}",
                    values.len()
                )));
            }
            Descriptor::Wave(WaveSignature { values })
        }
        DescriptorKind::Gcd => {
            let values = parse_floats(parts)?;
            let m = GraphletCorrelationMatrix::from_upper_triangle(&values).ok_or_else(|| {
                DescriptorError::Parse(format!("gcd record needs 55 values, got {}", values.len()))
            })?;
            Descriptor::Gcd(m)
        }
        DescriptorKind::PortraitDiv => {
            let mut parts = parts.peekable();
            let n_tok = parts
                .next()
                .ok_or_else(|| DescriptorError::Parse("portrait record missing n=".into()))?;
            let pairs_tok = parts
                .next()
                .ok_or_else(|| DescriptorError::Parse("portrait record missing pairs=".into()))?;
            let n: usize = n_tok
                .strip_prefix("n=")
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| DescriptorError::Parse(format!("bad n field {n_tok:?}")))?;
            let pairs: u64 = pairs_tok
                .strip_prefix("pairs=")
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| DescriptorError::Parse(format!("bad pairs field {pairs_tok:?}")))?;
            let mut entries = Vec::new();
            for tok in parts {
                let mut fields = tok.split(':');
                let entry = (|| {
                    let l: u32 = fields.next()?.parse().ok()?;
                    let k: u32 = fields.next()?.parse().ok()?;
                    let b: u32 = fields.next()?.parse().ok()?;
                    fields.next().is_none().then_some((l, k, b))
                })()
                .ok_or_else(|| DescriptorError::Parse(format!("bad portrait entry {tok:?}")))?;
                entries.push(entry);
            }
            Descriptor::Portrait(Portrait::from_entries(n, pairs, entries))
        }
    };
    Ok((id, descriptor))
}
