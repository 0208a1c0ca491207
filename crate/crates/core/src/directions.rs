//! Random direction matrices `V` with orthonormal columns.
//!
//! Two laws are supported: Haar-uniform on the Stiefel manifold and uniform
//! `m`-subsets of the canonical basis. Both satisfy `(d/m)·E[VVᵀ] = I`.
//! The orthogonal complement of `span(V)` is never materialized; slice
//! updates use `x' = x + V(s − Vᵀx)`.

use nalgebra::DMatrix;
use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionLaw {
    UniformStiefel,
    CanonicalSubset,
}

impl DirectionLaw {
    /// The constant `c_ν = d/m` that makes `c_ν VVᵀ∇U` unbiased.
    pub fn scaling(d: usize, m: usize) -> f64 {
        d as f64 / m as f64
    }

    pub fn sample(self, rng: &mut dyn RngCore, d: usize, m: usize) -> Result<DirectionMatrix> {
        match self {
            DirectionLaw::UniformStiefel => sample_uniform_stiefel(rng, d, m),
            DirectionLaw::CanonicalSubset => sample_canonical_subset(rng, d, m),
        }
    }
}

impl std::str::FromStr for DirectionLaw {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-stiefel" | "unif" | "stiefel" => Ok(Self::UniformStiefel),
            "canonical-subset" | "canonical" | "e" => Ok(Self::CanonicalSubset),
            other => Err(Error::InvalidConfig(format!("unknown direction law {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DirectionMatrix {
    /// Column-major `d×m` matrix with orthonormal columns.
    Dense { d: usize, m: usize, columns: Vec<f64> },
    /// Distinct zero-based indices into the canonical basis.
    Canonical { d: usize, indices: Vec<usize> },
}

fn check_counts(d: usize, m: usize) -> Result<()> {
    if m == 0 || m > d {
        return Err(Error::InvalidConfig(format!(
            "direction count must satisfy 1 <= m <= d, got m={m}, d={d}"
        )));
    }
    Ok(())
}

/// Haar-uniform `V` on the Stiefel manifold: thin QR of a `d×m` Gaussian
/// matrix with each column of `Q` multiplied by the sign of `R`'s diagonal.
pub fn sample_uniform_stiefel(rng: &mut dyn RngCore, d: usize, m: usize) -> Result<DirectionMatrix> {
    check_counts(d, m)?;
    let g = DMatrix::<f64>::from_fn(d, m, |_, _| StandardNormal.sample(&mut *rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..m {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(DirectionMatrix::Dense {
        d,
        m,
        columns: q.as_slice().to_vec(),
    })
}

/// `m` canonical basis vectors drawn uniformly without replacement by a
/// partial Fisher–Yates shuffle.
pub fn sample_canonical_subset(rng: &mut dyn RngCore, d: usize, m: usize) -> Result<DirectionMatrix> {
    check_counts(d, m)?;
    let mut pool: Vec<usize> = (0..d).collect();
    for i in 0..m {
        let j = rng.random_range(i..d);
        pool.swap(i, j);
    }
    pool.truncate(m);
    Ok(DirectionMatrix::Canonical { d, indices: pool })
}

impl DirectionMatrix {
    /// Dense matrix from explicit columns, checked for orthonormality.
    pub fn from_dense(v: &DMatrix<f64>) -> Result<Self> {
        let (d, m) = v.shape();
        check_counts(d, m)?;
        let gram = v.transpose() * v - DMatrix::<f64>::identity(m, m);
        if gram.amax() > 1e-10 {
            return Err(Error::InvalidConfig(format!(
                "columns are not orthonormal (max deviation {:e})",
                gram.amax()
            )));
        }
        Ok(Self::Dense {
            d,
            m,
            columns: v.as_slice().to_vec(),
        })
    }

    pub fn from_indices(d: usize, indices: Vec<usize>) -> Result<Self> {
        check_counts(d, indices.len())?;
        let mut seen = vec![false; d];
        for &i in &indices {
            if i >= d || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidConfig(format!(
                    "canonical indices must be distinct and below {d}"
                )));
            }
        }
        Ok(Self::Canonical { d, indices })
    }

    /// Full canonical basis in natural order.
    pub fn identity(d: usize) -> Self {
        Self::Canonical {
            d,
            indices: (0..d).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Dense { d, .. } | Self::Canonical { d, .. } => *d,
        }
    }

    pub fn count(&self) -> usize {
        match self {
            Self::Dense { m, .. } => *m,
            Self::Canonical { indices, .. } => indices.len(),
        }
    }

    /// `x ← x + α·v⁽ⁱ⁾`.
    #[inline]
    pub fn add_column(&self, i: usize, alpha: f64, x: &mut [f64]) {
        match self {
            Self::Dense { d, columns, .. } => {
                for (xj, vj) in x.iter_mut().zip(&columns[i * d..(i + 1) * d]) {
                    *xj += alpha * vj;
                }
            }
            Self::Canonical { indices, .. } => x[indices[i]] += alpha,
        }
    }

    /// `s = Vᵀx`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(self.project_unchecked(x))
    }

    pub(crate) fn project_unchecked(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::Dense { d, m, columns } => (0..*m)
                .map(|i| crate::targets::dot(&columns[i * d..(i + 1) * d], x))
                .collect(),
            Self::Canonical { indices, .. } => indices.iter().map(|&i| x[i]).collect(),
        }
    }

    /// `V s`.
    pub fn lift(&self, s: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.count(), s.len())?;
        let mut out = vec![0.0; self.dim()];
        self.add_lifted(s, 1.0, &mut out);
        Ok(out)
    }

    /// `x ← x + α·V s`.
    pub(crate) fn add_lifted(&self, s: &[f64], alpha: f64, x: &mut [f64]) {
        for (i, &si) in s.iter().enumerate() {
            self.add_column(i, alpha * si, x);
        }
    }

    /// `x + V s` as a fresh vector.
    pub fn offset(&self, x: &[f64], s: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.count(), s.len())?;
        let mut out = x.to_vec();
        self.add_lifted(s, 1.0, &mut out);
        Ok(out)
    }

    /// Replaces the slice coordinates of `x` by `s_new`, keeping the
    /// orthogonal-complement coordinates: `x' = x + V(s_new − Vᵀx)`.
    pub fn slice_update(&self, x: &[f64], s_new: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.count(), s_new.len())?;
        let mut out = x.to_vec();
        match self {
            Self::Canonical { indices, .. } => {
                for (&i, &s) in indices.iter().zip(s_new) {
                    out[i] = s;
                }
            }
            Self::Dense { .. } => {
                let current = self.project_unchecked(x);
                let delta: Vec<f64> = s_new.iter().zip(&current).map(|(a, b)| a - b).collect();
                self.add_lifted(&delta, 1.0, &mut out);
            }
        }
        Ok(out)
    }

    /// Dense `d×m` copy.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        match self {
            Self::Dense { d, m, columns } => DMatrix::from_column_slice(*d, *m, columns),
            Self::Canonical { d, indices } => {
                let mut v = DMatrix::zeros(*d, indices.len());
                for (j, &i) in indices.iter().enumerate() {
                    v[(i, j)] = 1.0;
                }
                v
            }
        }
    }

    /// `VVᵀ`, the orthogonal projector onto `span(V)`.
    pub fn projector(&self) -> DMatrix<f64> {
        let v = self.to_matrix();
        &v * v.transpose()
    }

    /// `max |VᵀV − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        match self {
            Self::Canonical { .. } => 0.0,
            Self::Dense { m, .. } => {
                let v = self.to_matrix();
                (v.transpose() * &v - DMatrix::<f64>::identity(*m, *m)).amax()
            }
        }
    }
}
