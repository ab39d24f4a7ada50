use crate::annotation::PriorField;
use crate::error::{GosError, Result};

/// Per-vertex log prior over the `L` labels of the inference label space.
///
/// A prior field covers only its `K ≤ L` annotation labels. Labels past `K`
/// get the row's background value (its smallest entry), and the extended
/// row is renormalized. A fully uniform row therefore becomes `1/L`, and
/// the difference between two labels inside `K` is unchanged.
#[derive(Clone, Debug)]
pub enum LogPrior {
    Uniform { label_space: usize },
    Field { label_space: usize, values: Vec<f64> },
}

impl LogPrior {
    pub fn new(field: Option<&PriorField>, n_vertices: usize, label_space: usize) -> Result<Self> {
        let Some(field) = field.filter(|f| f.num_labels() > 0) else {
            return Ok(LogPrior::Uniform { label_space });
        };
        let k = field.num_labels();
        if label_space < k {
            return Err(GosError::InvalidConfig(format!(
                "label space {label_space} is smaller than the {k} annotation labels"
            )));
        }
        if field.num_vertices() != n_vertices {
            return Err(GosError::PartitionMismatch(format!(
                "prior field has {} rows, graph has {n_vertices} vertices",
                field.num_vertices()
            )));
        }
        let mut values = Vec::with_capacity(n_vertices * label_space);
        for row in field.rows() {
            let background = row.iter().cloned().fold(f64::INFINITY, f64::min);
            let z: f64 = row.iter().sum::<f64>() + (label_space - k) as f64 * background;
            let ln_z = z.ln();
            values.extend(row.iter().map(|p| p.ln() - ln_z));
            values.extend(std::iter::repeat_n(background.ln() - ln_z, label_space - k));
        }
        Ok(LogPrior::Field {
            label_space,
            values,
        })
    }

    pub fn label_space(&self) -> usize {
        match self {
            LogPrior::Uniform { label_space } | LogPrior::Field { label_space, .. } => *label_space,
        }
    }

    #[inline]
    pub fn get(&self, v: usize, label: usize) -> f64 {
        match self {
            LogPrior::Uniform { label_space } => -(*label_space as f64).ln(),
            LogPrior::Field {
                label_space,
                values,
            } => values[v * label_space + label],
        }
    }

    /// Row `v`, or `None` for the uniform prior.
    pub fn row(&self, v: usize) -> Option<&[f64]> {
        match self {
            LogPrior::Uniform { .. } => None,
            LogPrior::Field {
                label_space,
                values,
            } => Some(&values[v * label_space..(v + 1) * label_space]),
        }
    }
}
