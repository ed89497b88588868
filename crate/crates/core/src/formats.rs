//! File formats shared with the CLI: JSON schemas for states, channels,
//! games, and verdict reports, plus the CSV table format for classical
//! structures. Matrices are nested row-major arrays with each entry a
//! two-element [real, imaginary] pair. JSON floats are always written with
//! 17 significant digits so identical inputs produce byte-identical reports.

use crate::channels::{ChannelError, KrausChannel};
use crate::compare::{ClassicalCertificate, ClassicalComparison, ComparisonVerdict, Diagnostics};
use crate::games::{Game, GameError};
use crate::matops::{ComplexMatrix, HermitianOperator, MatError, SystemLayout};
use crate::states::{ClassicalStructure, DensityOperator, InformationStructure, StateError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("csv parse error at line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("{0}")]
    Schema(String),
}

pub type MatrixData = Vec<Vec<[f64; 2]>>;

pub fn encode_matrix(m: &ComplexMatrix) -> MatrixData {
    (0..m.rows())
        .map(|r| {
            (0..m.cols())
                .map(|c| [m[(r, c)].re, m[(r, c)].im])
                .collect()
        })
        .collect()
}

pub fn decode_matrix(data: &[Vec<[f64; 2]>]) -> Result<ComplexMatrix, FormatError> {
    Ok(ComplexMatrix::from_rows(data)?)
}

/// On-disk state: density operator over labeled factors, optionally tagged
/// with the hidden / accessible roles of an information structure.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateFile {
    pub labels: Vec<String>,
    pub dims: Vec<usize>,
    pub matrix: MatrixData,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accessible: Option<String>,
}

impl StateFile {
    pub fn from_structure(s: &InformationStructure) -> Self {
        Self {
            labels: s.joint().layout().labels().to_vec(),
            dims: s.joint().layout().dims().to_vec(),
            matrix: encode_matrix(s.matrix()),
            hidden: Some(s.hidden_label().to_string()),
            accessible: Some(s.accessible_label().to_string()),
        }
    }

    pub fn to_density(&self) -> Result<DensityOperator, FormatError> {
        if self.labels.len() != self.dims.len() {
            return Err(FormatError::Schema(
                "labels and dims must have equal length".into(),
            ));
        }
        let factors: Vec<(&str, usize)> = self
            .labels
            .iter()
            .map(|l| l.as_str())
            .zip(self.dims.iter().copied())
            .collect();
        let layout = SystemLayout::new(&factors)?;
        let matrix = decode_matrix(&self.matrix)?;
        Ok(DensityOperator::from_matrix(matrix, layout)?)
    }

    pub fn to_structure(&self) -> Result<InformationStructure, FormatError> {
        let density = self.to_density()?;
        let hidden = self
            .hidden
            .as_deref()
            .ok_or_else(|| FormatError::Schema("missing `hidden` label".into()))?;
        let accessible = self
            .accessible
            .as_deref()
            .ok_or_else(|| FormatError::Schema("missing `accessible` label".into()))?;
        Ok(InformationStructure::new(density, hidden, accessible)?)
    }
}

/// On-disk channel: Kraus operators with explicit dimensions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelFile {
    pub in_dim: usize,
    pub out_dim: usize,
    pub kraus: Vec<MatrixData>,
}

impl ChannelFile {
    pub fn from_channel(ch: &KrausChannel) -> Self {
        Self {
            in_dim: ch.in_dim(),
            out_dim: ch.out_dim(),
            kraus: ch.kraus_ops().iter().map(encode_matrix).collect(),
        }
    }

    pub fn to_channel(&self) -> Result<KrausChannel, FormatError> {
        let kraus = self
            .kraus
            .iter()
            .map(|m| decode_matrix(m))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(KrausChannel::new(self.in_dim, self.out_dim, kraus)?)
    }
}

/// On-disk game: environment dimensions and state, plus the payoff actions.
/// A trivial environment is written as env_dims [1, 1] with matrix [[[1, 0]]].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GameFile {
    pub env_dims: [usize; 2],
    pub environment: MatrixData,
    pub actions: Vec<MatrixData>,
}

impl GameFile {
    pub fn from_game(g: &Game) -> Self {
        Self {
            env_dims: [g.env_a_dim(), g.env_b_dim()],
            environment: encode_matrix(g.environment().matrix()),
            actions: g
                .actions()
                .iter()
                .map(|a| encode_matrix(a.matrix()))
                .collect(),
        }
    }

    pub fn to_game(&self) -> Result<Game, FormatError> {
        let layout = SystemLayout::new(&[("A", self.env_dims[0]), ("B", self.env_dims[1])])?;
        let env_matrix = decode_matrix(&self.environment)?;
        let environment = DensityOperator::from_matrix(env_matrix, layout)?;
        let actions = self
            .actions
            .iter()
            .map(|m| Ok(HermitianOperator::new(decode_matrix(m)?)?))
            .collect::<Result<Vec<_>, FormatError>>()?;
        Ok(Game::new(environment, actions)?)
    }
}

/// Machine-readable verdict.
#[derive(Clone, Debug, Serialize)]
pub struct VerdictReport {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payoff_phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payoff_psi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<GameFile>,
    pub diagnostics: Diagnostics,
}

impl VerdictReport {
    pub fn from_verdict(v: &ComparisonVerdict) -> Self {
        match v {
            ComparisonVerdict::Better {
                channel,
                diagnostics,
            } => Self {
                kind: "better".into(),
                margin: None,
                payoff_phi: None,
                payoff_psi: None,
                channel: Some(ChannelFile::from_channel(channel)),
                witness: None,
                diagnostics: diagnostics.clone(),
            },
            ComparisonVerdict::NotBetter {
                witness,
                margin,
                payoff_phi,
                payoff_psi,
                diagnostics,
            } => Self {
                kind: "not_better".into(),
                margin: Some(*margin),
                payoff_phi: Some(*payoff_phi),
                payoff_psi: Some(*payoff_psi),
                channel: None,
                witness: Some(GameFile::from_game(witness)),
                diagnostics: diagnostics.clone(),
            },
            ComparisonVerdict::Indeterminate { diagnostics } => Self {
                kind: "indeterminate".into(),
                margin: None,
                payoff_phi: None,
                payoff_psi: None,
                channel: None,
                witness: None,
                diagnostics: diagnostics.clone(),
            },
        }
    }
}

/// Machine-readable classical comparison outcome.
#[derive(Clone, Debug, Serialize)]
pub struct ClassicalReport {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub garbling: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateReport {
    pub payoffs: Vec<Vec<f64>>,
    pub margin: f64,
}

impl ClassicalReport {
    pub fn from_comparison(c: &ClassicalComparison) -> Self {
        match c {
            ClassicalComparison::Feasible(f) => Self {
                kind: "feasible".into(),
                garbling: Some(f.entries().to_vec()),
                certificate: None,
            },
            ClassicalComparison::Infeasible(ClassicalCertificate { payoffs, margin }) => Self {
                kind: "infeasible".into(),
                garbling: None,
                certificate: Some(CertificateReport {
                    payoffs: payoffs.clone(),
                    margin: *margin,
                }),
            },
        }
    }
}

/// Serializes with every float printed at 17 significant digits, which both
/// round-trips f64 exactly and keeps reports byte-identical across runs.
pub fn to_json(value: &impl Serialize) -> Result<String, FormatError> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json writes utf8"))
}

struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Parses the classical CSV table: a header row of signal labels, then one
/// row per hidden state with its label in the first column.
pub fn parse_classical_csv(text: &str) -> Result<ClassicalStructure, FormatError> {
    let mut rows = Vec::new();
    let mut width = None;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if idx == 0 {
            continue; // header of signal labels
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() < 2 {
            return Err(FormatError::Csv {
                line: idx + 1,
                message: "expected a label followed by weights".into(),
            });
        }
        let values = cells[1..]
            .iter()
            .map(|c| {
                c.trim().parse::<f64>().map_err(|e| FormatError::Csv {
                    line: idx + 1,
                    message: format!("bad number `{}`: {e}", c.trim()),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if let Some(w) = width {
            if values.len() != w {
                return Err(FormatError::Csv {
                    line: idx + 1,
                    message: format!("expected {w} weights, found {}", values.len()),
                });
            }
        } else {
            width = Some(values.len());
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(FormatError::Csv {
            line: 1,
            message: "no data rows".into(),
        });
    }
    Ok(ClassicalStructure::new(rows)?)
}

/// Writes the classical CSV table with generated labels.
pub fn write_classical_csv(p: &ClassicalStructure) -> String {
    let mut out = String::new();
    out.push_str("state");
    for t in 0..p.signal_count() {
        out.push_str(&format!(",s{t}"));
    }
    out.push('\n');
    for (n, row) in p.weights().iter().enumerate() {
        out.push_str(&format!("n{n}"));
        for v in row {
            out.push_str(&format!(",{v:.17}"));
        }
        out.push('\n');
    }
    out
}
