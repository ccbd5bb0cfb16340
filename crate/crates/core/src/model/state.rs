use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::basis::{CompositeBasis, MatterLevel};
use super::operator::{header_field, parse, Operator};
use crate::error::{Error, Result};

type C = Complex64;

/// State vector on a [`CompositeBasis`]. May be unnormalized (trajectories
/// carry the decaying norm between jumps).
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    basis: CompositeBasis,
    amps: Vec<C>,
}

impl PureState {
    pub fn zeros(basis: CompositeBasis) -> Self {
        Self {
            basis,
            amps: vec![C::new(0.0, 0.0); basis.dim()],
        }
    }

    pub fn basis_state(basis: CompositeBasis, level: MatterLevel, n_plus: usize, n_minus: usize) -> Self {
        let mut s = Self::zeros(basis);
        s.amps[basis.index(level, n_plus, n_minus)] = C::new(1.0, 0.0);
        s
    }

    /// Photon vacuum with the dot in `sum_k coeffs[k] |level_k>`, normalized.
    pub fn matter_superposition(basis: CompositeBasis, coeffs: &[(MatterLevel, C)]) -> Result<Self> {
        let mut s = Self::zeros(basis);
        for &(level, c) in coeffs {
            s.amps[basis.index(level, 0, 0)] += c;
        }
        s.normalize()?;
        Ok(s)
    }

    /// Electron spin along +x with no photons: `(|e up> + |e down>)/sqrt 2`.
    pub fn electron_x(basis: CompositeBasis) -> Self {
        let h = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::matter_superposition(basis, &[(MatterLevel::ElectronUp, h), (MatterLevel::ElectronDown, h)])
            .expect("nonzero")
    }

    pub fn from_amplitudes(basis: CompositeBasis, amps: Vec<C>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::InvalidInput(format!(
                "amplitude vector has length {}, basis dimension is {}",
                amps.len(),
                basis.dim()
            )));
        }
        Ok(Self { basis, amps })
    }

    pub fn basis(&self) -> CompositeBasis {
        self.basis
    }

    pub fn amplitudes(&self) -> &[C] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C] {
        &mut self.amps
    }

    pub fn amp(&self, level: MatterLevel, n_plus: usize, n_minus: usize) -> C {
        self.amps[self.basis.index(level, n_plus, n_minus)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidInput("cannot normalize a zero or non-finite state".into()));
        }
        self.amps.iter_mut().for_each(|a| *a /= n);
        Ok(())
    }

    pub fn inner(&self, other: &Self) -> C {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// `<psi|op|psi> / <psi|psi>`.
    pub fn expect(&self, op: &Operator) -> C {
        op.expectation(&self.amps, &self.amps) / self.norm_sqr()
    }

    pub fn to_density(&self) -> DensityOperator {
        let n = self.basis.dim();
        let norm = self.norm_sqr();
        let mut m = vec![C::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = self.amps[i] * self.amps[j].conj() / norm;
            }
        }
        DensityOperator { basis: self.basis, data: m }
    }

    /// Plain-text form: `# state dim=N` then one `index re im` line per
    /// nonzero amplitude.
    pub fn to_text(&self) -> String {
        let mut s = format!("# state dim={} cutoff={}\n", self.basis.dim(), self.basis.cutoff());
        for (i, a) in self.amps.iter().enumerate() {
            if *a != C::new(0.0, 0.0) {
                let _ = writeln!(s, "{i} {:e} {:e}", a.re, a.im);
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty state text".into()))?;
        let dim = header_field(header, "state", "dim")?;
        let cutoff = header_field(header, "state", "cutoff")?;
        let basis = CompositeBasis::new(cutoff)?;
        if basis.dim() != dim {
            return Err(Error::Parse(format!("dim={dim} inconsistent with cutoff={cutoff}")));
        }
        let mut s = Self::zeros(basis);
        for line in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::Parse(format!("bad state line: {line:?}")));
            }
            let i: usize = parse(f[0])?;
            if i >= dim {
                return Err(Error::Parse(format!("index {i} outside dimension {dim}")));
            }
            s.amps[i] = C::new(parse(f[1])?, parse(f[2])?);
        }
        Ok(s)
    }
}

/// Density matrix on a [`CompositeBasis`], stored dense row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    basis: CompositeBasis,
    data: Vec<C>,
}

impl DensityOperator {
    pub fn from_row_major(basis: CompositeBasis, data: Vec<C>) -> Result<Self> {
        let n = basis.dim();
        if data.len() != n * n {
            return Err(Error::InvalidInput(format!("expected {} entries, got {}", n * n, data.len())));
        }
        Ok(Self { basis, data })
    }

    pub fn basis(&self) -> CompositeBasis {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn data(&self) -> &[C] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C {
        self.data[i * self.dim() + j]
    }

    pub fn trace(&self) -> C {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// `tr(op rho)`.
    pub fn expect(&self, op: &Operator) -> C {
        let n = self.dim();
        let mut acc = C::new(0.0, 0.0);
        for r in 0..n {
            for (c, v) in op.row(r) {
                acc += v * self.data[c * n + r];
            }
        }
        acc
    }

    pub fn purity(&self) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.data[i * n + j] * self.data[j * n + i]).re;
            }
        }
        acc
    }

    pub fn to_matrix(&self) -> DMatrix<C> {
        DMatrix::from_row_slice(self.dim(), self.dim(), &self.data)
    }

    pub fn max_hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.to_matrix();
        let herm = (&m + m.adjoint()) * C::new(0.5, 0.0);
        SymmetricEigen::new(herm).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Checks Hermiticity (1e-12), unit trace (1e-10) and positivity (-1e-10).
    pub fn validate(&self) -> Result<()> {
        let herm = self.max_hermiticity_error();
        if herm > 1e-12 {
            return Err(Error::NotDensity(format!("Hermiticity violation {herm:.3e}")));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::NotDensity(format!("trace {tr}")));
        }
        let min = self.min_eigenvalue();
        if min < -1e-10 {
            return Err(Error::NotDensity(format!("eigenvalue {min:.3e}")));
        }
        Ok(())
    }
}
