use crate::error::{Error, Result};

/// Laguerre polynomial `L_j(x)` by the three-term recurrence.
pub fn laguerre(j: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 1.0 - x);
    if j == 0 {
        return prev;
    }
    for k in 1..j {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 - x) * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Channel matrix `U` (p² × J), stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelBasis {
    side: usize,
    n_channels: usize,
    width: f64,
    columns: Vec<f64>,
}

impl ChannelBasis {
    /// Wraps explicit columns, each of length `side²`.
    pub fn from_columns(side: usize, columns: Vec<Vec<f64>>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidParameter("a channel basis needs at least one column".into()));
        }
        if let Some(bad) = columns.iter().find(|c| c.len() != side * side) {
            return Err(Error::ShapeMismatch {
                expected: format!("{} samples per column", side * side),
                actual: bad.len().to_string(),
            });
        }
        Ok(Self {
            side,
            n_channels: columns.len(),
            width: f64::NAN,
            columns: columns.concat(),
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    /// LG width parameter in pixels (NaN for explicit bases).
    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let len = self.side * self.side;
        &self.columns[j * len..(j + 1) * len]
    }

    /// `Uᵀ · vec(patch)`.
    pub fn channelize(&self, patch: &[f64]) -> Result<Vec<f64>> {
        if patch.len() != self.side * self.side {
            return Err(Error::ShapeMismatch {
                expected: format!("{0}x{0} patch", self.side),
                actual: format!("{} values", patch.len()),
            });
        }
        Ok((0..self.n_channels)
            .map(|j| self.column(j).iter().zip(patch).map(|(u, v)| u * v).sum())
            .collect())
    }
}

/// Samples `C_j(r) = exp(-π r²/a²) · L_j(2π r²/a²)` on a `p × p` grid
/// centered on pixel `(p/2, p/2)`, each column normalized to unit length.
pub fn lg_channels(side: usize, n_channels: usize, width: f64) -> Result<ChannelBasis> {
    if side == 0 || n_channels == 0 {
        return Err(Error::InvalidParameter("ROI side and channel count must be positive".into()));
    }
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::InvalidParameter(format!("LG width must be positive, got {width}")));
    }
    let center = (side / 2) as f64;
    let scale = std::f64::consts::PI / (width * width);
    let mut columns = Vec::with_capacity(side * side * n_channels);
    for j in 0..n_channels {
        let start = columns.len();
        for row in 0..side {
            for col in 0..side {
                let r2 = (row as f64 - center).powi(2) + (col as f64 - center).powi(2);
                columns.push((-scale * r2).exp() * laguerre(j, 2.0 * scale * r2));
            }
        }
        let norm = columns[start..].iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut columns[start..] {
            *v /= norm;
        }
    }
    Ok(ChannelBasis {
        side,
        n_channels,
        width,
        columns,
    })
}
