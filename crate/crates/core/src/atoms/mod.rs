//! Atoms and blocks: smooth `(q, lambda, inf)`-atoms with vanishing moments,
//! rough blocks on large cubes, the explicit atoms with a closed-form Fourier
//! transform, the special cutoffs, and the rough-block decomposition.

mod construct;
mod cutoff;
mod decompose;
mod project;
mod verify;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{Cube, GridFunction};
use crate::morrey::MorreyParams;

pub use construct::{
    dilate_atom, hkp_alpha, hkp_amplitude, hkp_profile, hkp_profile_hat, hkp_support_half_width, make_hkp_atom,
    make_hkp_atom_scaled, make_rough_block, make_smooth_atom, HKP_PROFILE_ORDER,
};
pub use cutoff::{make_cutoff_pair, make_moment_unit, make_suitable_cutoff, CutoffPair};
pub use decompose::{global_local_gap, rough_block_decompose, BlockDecomposition};
pub use project::{bump_weight, discrete_moments, multi_indices, project_moments};
pub use verify::{verify_atom, AtomCertificate, MomentResidual, MOMENT_TOLERANCE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AtomKind {
    Smooth,
    Rough,
    Hkp,
}

/// How an atom was built, so dilations can be regenerated exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "lowercase")]
pub enum AtomRecipe {
    Smooth { seed: u64 },
    Rough { seed: u64 },
    Hkp { k: usize, eps: f64 },
}

/// A function supported in `cube` with `|a| <= |Q|^{-1/lambda}` and, for
/// smooth and HKP atoms, vanishing moments up to `moment_order`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub kind: AtomKind,
    pub cube: Cube,
    pub data: GridFunction,
    /// `-1` means no vanishing moments are claimed.
    pub moment_order: i32,
    pub params: MorreyParams,
    #[serde(default)]
    pub recipe: Option<AtomRecipe>,
}

impl Atom {
    /// Bound `|Q|^{-1/lambda}` on the sup norm.
    pub fn sup_bound(&self) -> f64 {
        self.cube.volume().powf(-1.0 / self.params.lambda())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
