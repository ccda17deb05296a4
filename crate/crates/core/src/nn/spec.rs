//! Architecture descriptors for the three network families and the
//! reference layer tables they must reproduce.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NetworkKind {
    #[serde(rename = "ANN", alias = "ANNV", alias = "ann")]
    Ann,
    #[serde(rename = "RNN", alias = "RNNV", alias = "rnn")]
    Rnn,
    #[serde(rename = "CNN", alias = "CNNV", alias = "cnn")]
    Cnn,
}

impl NetworkKind {
    pub const ALL: [NetworkKind; 3] = [NetworkKind::Ann, NetworkKind::Rnn, NetworkKind::Cnn];

    pub fn as_str(self) -> &'static str {
        match self {
            NetworkKind::Ann => "ANN",
            NetworkKind::Rnn => "RNN",
            NetworkKind::Cnn => "CNN",
        }
    }
}

impl fmt::Display for NetworkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NetworkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim_end_matches(['V', 'v']).to_ascii_uppercase().as_str() {
            "ANN" => Ok(NetworkKind::Ann),
            "RNN" => Ok(NetworkKind::Rnn),
            "CNN" => Ok(NetworkKind::Cnn),
            _ => Err(Error::invalid(format!("unknown network {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    Same,
    Valid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum LayerSpec {
    Conv {
        kernel: (usize, usize),
        stride: usize,
        filters: usize,
        padding: Padding,
    },
    Elu {
        alpha: f64,
    },
    Relu,
    #[serde(rename = "maxpool")]
    MaxPool {
        kernel: (usize, usize),
        stride: usize,
    },
    Dropout {
        rate: f64,
    },
    Dense {
        units: usize,
    },
    Recurrent {
        hidden: usize,
    },
    Vectorize,
}

impl LayerSpec {
    /// The table-level view of this layer (drops widths the table leaves open).
    pub fn table_entry(&self) -> TableEntry {
        match *self {
            LayerSpec::Conv { kernel, stride, .. } => TableEntry::Conv { kernel, stride },
            LayerSpec::Elu { .. } => TableEntry::Elu,
            LayerSpec::Relu => TableEntry::Relu,
            LayerSpec::MaxPool { kernel, stride } => TableEntry::MaxPool { kernel, stride },
            LayerSpec::Dropout { rate } => TableEntry::Dropout(rate),
            LayerSpec::Dense { units } => TableEntry::Dense(units),
            LayerSpec::Recurrent { hidden } => TableEntry::Recurrent(hidden),
            LayerSpec::Vectorize => TableEntry::Vectorization,
        }
    }
}

/// One cell entry of the reference structure table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TableEntry {
    Input,
    Vectorization,
    Conv { kernel: (usize, usize), stride: usize },
    Elu,
    Relu,
    MaxPool { kernel: (usize, usize), stride: usize },
    Dropout(f64),
    Dense(usize),
    Recurrent(usize),
    Classifier,
    Output,
}

impl fmt::Display for TableEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableEntry::Input => write!(f, "Input"),
            TableEntry::Vectorization => write!(f, "Vectorization"),
            TableEntry::Conv { kernel, stride } => {
                write!(f, "Conv({}x{}, stride {stride})", kernel.0, kernel.1)
            }
            TableEntry::Elu => write!(f, "ELU"),
            TableEntry::Relu => write!(f, "ReLU"),
            TableEntry::MaxPool { kernel, stride } => {
                write!(f, "MaxPool({}x{}, stride {stride})", kernel.0, kernel.1)
            }
            TableEntry::Dropout(r) => write!(f, "Dropout({r})"),
            TableEntry::Dense(u) => write!(f, "Dense({u})"),
            TableEntry::Recurrent(h) => write!(f, "Recurrent({h})"),
            TableEntry::Classifier => write!(f, "softmax | mSVM | RF"),
            TableEntry::Output => write!(f, "Output"),
        }
    }
}

pub struct TableRow {
    pub ordinal: u8,
    pub entries: &'static [TableEntry],
}

use TableEntry as E;

const CONV_S2: E = E::Conv { kernel: (3, 3), stride: 2 };
const CONV_S1: E = E::Conv { kernel: (3, 3), stride: 1 };
const POOL: E = E::MaxPool { kernel: (2, 2), stride: 2 };

/// Reference rows for the CNN column, transcribed row by row. A first
/// pooling row without a stride takes stride = kernel.
pub const CNN_TABLE: &[TableRow] = &[
    TableRow { ordinal: 1, entries: &[E::Input] },
    TableRow { ordinal: 2, entries: &[CONV_S2, E::Elu, CONV_S2, E::Elu] },
    TableRow { ordinal: 3, entries: &[POOL, E::Dropout(0.25)] },
    TableRow { ordinal: 4, entries: &[CONV_S1, E::Elu, CONV_S1, E::Elu] },
    TableRow { ordinal: 5, entries: &[POOL, E::Dropout(0.25)] },
    TableRow { ordinal: 6, entries: &[CONV_S1, E::Elu, CONV_S1, E::Elu] },
    TableRow { ordinal: 7, entries: &[POOL, E::Dropout(0.25)] },
    TableRow { ordinal: 8, entries: &[E::Dense(128), E::Elu] },
    TableRow { ordinal: 9, entries: &[E::Dropout(0.5)] },
    TableRow { ordinal: 10, entries: &[E::Dense(128), E::Elu] },
    TableRow { ordinal: 11, entries: &[E::Dropout(0.5)] },
    TableRow { ordinal: 12, entries: &[E::Dense(3), E::Elu] },
    TableRow { ordinal: 13, entries: &[E::Dropout(0.5)] },
    TableRow { ordinal: 14, entries: &[E::Classifier] },
    TableRow { ordinal: 15, entries: &[E::Output] },
];

pub const ANN_TABLE: &[TableRow] = &[
    TableRow { ordinal: 1, entries: &[E::Input] },
    TableRow { ordinal: 2, entries: &[E::Vectorization] },
    TableRow { ordinal: 3, entries: &[E::Dense(512)] },
    TableRow { ordinal: 4, entries: &[E::Relu] },
    TableRow { ordinal: 5, entries: &[E::Dropout(0.25)] },
    TableRow { ordinal: 6, entries: &[E::Dense(512)] },
    TableRow { ordinal: 7, entries: &[E::Relu] },
    TableRow { ordinal: 8, entries: &[E::Dropout(0.25)] },
    TableRow { ordinal: 9, entries: &[E::Dense(512)] },
    TableRow { ordinal: 10, entries: &[E::Relu] },
    TableRow { ordinal: 11, entries: &[E::Dropout(0.25)] },
    TableRow { ordinal: 12, entries: &[E::Dense(3)] },
    TableRow { ordinal: 13, entries: &[E::Dropout(0.5)] },
    TableRow { ordinal: 14, entries: &[E::Classifier] },
    TableRow { ordinal: 15, entries: &[E::Output] },
];

pub const RNN_TABLE: &[TableRow] = &[
    TableRow { ordinal: 1, entries: &[E::Input] },
    TableRow { ordinal: 2, entries: &[E::Vectorization] },
    TableRow { ordinal: 3, entries: &[E::Recurrent(100)] },
    TableRow { ordinal: 4, entries: &[E::Dense(3)] },
    TableRow { ordinal: 5, entries: &[E::Classifier] },
    TableRow { ordinal: 6, entries: &[E::Output] },
];

pub fn reference_table(kind: NetworkKind) -> &'static [TableRow] {
    match kind {
        NetworkKind::Ann => ANN_TABLE,
        NetworkKind::Rnn => RNN_TABLE,
        NetworkKind::Cnn => CNN_TABLE,
    }
}

/// Widths the reference table leaves open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpecOptions {
    /// Filters in the three convolution blocks.
    pub conv_filters: [usize; 3],
    pub elu_alpha: f64,
}

impl Default for SpecOptions {
    fn default() -> Self {
        SpecOptions {
            conv_filters: [32, 64, 64],
            elu_alpha: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub kind: NetworkKind,
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    pub fn template(kind: NetworkKind, opts: &SpecOptions) -> NetworkSpec {
        match kind {
            NetworkKind::Ann => Self::ann(),
            NetworkKind::Rnn => Self::rnn(),
            NetworkKind::Cnn => Self::cnn(opts),
        }
    }

    pub fn cnn(opts: &SpecOptions) -> NetworkSpec {
        let alpha = opts.elu_alpha;
        let mut layers = Vec::new();
        for (block, &filters) in opts.conv_filters.iter().enumerate() {
            let stride = if block == 0 { 2 } else { 1 };
            for _ in 0..2 {
                layers.push(LayerSpec::Conv {
                    kernel: (3, 3),
                    stride,
                    filters,
                    padding: Padding::Same,
                });
                layers.push(LayerSpec::Elu { alpha });
            }
            layers.push(LayerSpec::MaxPool { kernel: (2, 2), stride: 2 });
            layers.push(LayerSpec::Dropout { rate: 0.25 });
        }
        for _ in 0..2 {
            layers.push(LayerSpec::Dense { units: 128 });
            layers.push(LayerSpec::Elu { alpha });
            layers.push(LayerSpec::Dropout { rate: 0.5 });
        }
        layers.push(LayerSpec::Dense { units: 3 });
        layers.push(LayerSpec::Elu { alpha });
        layers.push(LayerSpec::Dropout { rate: 0.5 });
        NetworkSpec {
            kind: NetworkKind::Cnn,
            layers,
        }
    }

    pub fn ann() -> NetworkSpec {
        let mut layers = vec![LayerSpec::Vectorize];
        for _ in 0..3 {
            layers.push(LayerSpec::Dense { units: 512 });
            layers.push(LayerSpec::Relu);
            layers.push(LayerSpec::Dropout { rate: 0.25 });
        }
        layers.push(LayerSpec::Dense { units: 3 });
        layers.push(LayerSpec::Dropout { rate: 0.5 });
        NetworkSpec {
            kind: NetworkKind::Ann,
            layers,
        }
    }

    pub fn rnn() -> NetworkSpec {
        NetworkSpec {
            kind: NetworkKind::Rnn,
            layers: vec![
                LayerSpec::Vectorize,
                LayerSpec::Recurrent { hidden: 100 },
                LayerSpec::Dense { units: 3 },
            ],
        }
    }

    /// Number of output classes (units of the last dense layer).
    pub fn classes(&self) -> usize {
        self.layers
            .iter()
            .rev()
            .find_map(|l| match l {
                LayerSpec::Dense { units } => Some(*units),
                _ => None,
            })
            .unwrap_or(0)
    }

    /// Differences between this spec and the reference table for its kind;
    /// empty when they agree layer for layer.
    pub fn conformance_diff(&self) -> Vec<String> {
        let expected: Vec<(u8, TableEntry)> = reference_table(self.kind)
            .iter()
            .flat_map(|row| row.entries.iter().map(move |e| (row.ordinal, *e)))
            .filter(|(_, e)| !matches!(e, E::Input | E::Classifier | E::Output))
            .collect();
        let actual: Vec<TableEntry> = self.layers.iter().map(LayerSpec::table_entry).collect();
        let mut diff = Vec::new();
        for i in 0..expected.len().max(actual.len()) {
            match (expected.get(i), actual.get(i)) {
                (Some((row, e)), Some(a)) if e != a => {
                    diff.push(format!("layer {i} (table row {row}): expected {e}, found {a}"))
                }
                (Some((row, e)), None) => {
                    diff.push(format!("layer {i} (table row {row}): expected {e}, missing"))
                }
                (None, Some(a)) => diff.push(format!("layer {i}: unexpected {a}")),
                _ => {}
            }
        }
        for (i, layer) in self.layers.iter().enumerate() {
            if let LayerSpec::Dropout { rate } = layer {
                if *rate != 0.25 && *rate != 0.5 {
                    diff.push(format!("layer {i}: dropout rate {rate} not in {{0.25, 0.5}}"));
                }
            }
        }
        diff
    }

    pub fn validate(&self) -> Result<()> {
        let diff = self.conformance_diff();
        if diff.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "{} spec deviates from its template: {}",
                self.kind,
                diff.join("; ")
            )))
        }
    }
}
