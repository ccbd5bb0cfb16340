use crate::error::{Error, Result};

/// Quantum-dot level: resident electron or trion, with its spin projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MatterLevel {
    /// Electron, S_z = +1/2.
    ElectronUp,
    /// Electron, S_z = -1/2.
    ElectronDown,
    /// Trion with heavy-hole spin +3/2 (pseudospin J_z = +1/2).
    TrionUp,
    /// Trion with heavy-hole spin -3/2 (pseudospin J_z = -1/2).
    TrionDown,
}

impl MatterLevel {
    pub const ALL: [MatterLevel; 4] = [
        MatterLevel::ElectronUp,
        MatterLevel::ElectronDown,
        MatterLevel::TrionUp,
        MatterLevel::TrionDown,
    ];

    pub fn index(self) -> usize {
        match self {
            MatterLevel::ElectronUp => 0,
            MatterLevel::ElectronDown => 1,
            MatterLevel::TrionUp => 2,
            MatterLevel::TrionDown => 3,
        }
    }

    pub fn is_trion(self) -> bool {
        matches!(self, MatterLevel::TrionUp | MatterLevel::TrionDown)
    }

    /// `true` for the branch coupled to sigma+ light (e-up / trion-up).
    pub fn is_up_branch(self) -> bool {
        matches!(self, MatterLevel::ElectronUp | MatterLevel::TrionUp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisState {
    pub level: MatterLevel,
    pub n_plus: usize,
    pub n_minus: usize,
}

/// Matter level times two truncated Fock registers (sigma+ and sigma-).
///
/// Flat index is matter-major, then `n_plus`, then `n_minus`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompositeBasis {
    cutoff: usize,
}

impl CompositeBasis {
    pub fn new(cutoff: usize) -> Result<Self> {
        if cutoff < 1 {
            return Err(Error::InvalidParams("photon cutoff must be >= 1".into()));
        }
        Ok(Self { cutoff })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Number of Fock states per mode.
    pub fn levels(&self) -> usize {
        self.cutoff + 1
    }

    pub fn dim(&self) -> usize {
        4 * self.levels() * self.levels()
    }

    pub fn index(&self, level: MatterLevel, n_plus: usize, n_minus: usize) -> usize {
        debug_assert!(n_plus <= self.cutoff && n_minus <= self.cutoff);
        let l = self.levels();
        (level.index() * l + n_plus) * l + n_minus
    }

    pub fn try_index(&self, level: MatterLevel, n_plus: usize, n_minus: usize) -> Option<usize> {
        (n_plus <= self.cutoff && n_minus <= self.cutoff).then(|| self.index(level, n_plus, n_minus))
    }

    pub fn state(&self, index: usize) -> BasisState {
        let l = self.levels();
        let n_minus = index % l;
        let n_plus = (index / l) % l;
        let level = MatterLevel::ALL[index / (l * l)];
        BasisState { level, n_plus, n_minus }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, BasisState)> + '_ {
        (0..self.dim()).map(move |i| (i, self.state(i)))
    }
}
