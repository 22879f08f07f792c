//! Attribute transfer by copying per-level latent chunks from one code into
//! another.

use std::collections::BTreeSet;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::LatentLayout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleName {
    Pose,
    Color,
    Texture,
    Custom,
}

impl std::fmt::Display for ScheduleName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScheduleName::Pose => "pose",
            ScheduleName::Color => "color",
            ScheduleName::Texture => "texture",
            ScheduleName::Custom => "custom",
        })
    }
}

impl FromStr for ScheduleName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pose" => Ok(ScheduleName::Pose),
            "color" => Ok(ScheduleName::Color),
            "texture" => Ok(ScheduleName::Texture),
            "custom" => Ok(ScheduleName::Custom),
            other => Err(Error::InvalidArgument(format!(
                "unknown schedule `{other}` (expected pose, color, texture or custom)"
            ))),
        }
    }
}

/// Which levels' chunks get copied from the target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferSchedule {
    pub name: ScheduleName,
    /// 1-based level indices.
    pub levels: BTreeSet<usize>,
}

impl TransferSchedule {
    pub fn custom(levels: impl IntoIterator<Item = usize>) -> Result<Self> {
        let levels: BTreeSet<usize> = levels.into_iter().collect();
        if levels.is_empty() {
            return Err(Error::InvalidArgument("schedule needs at least one level".into()));
        }
        if levels.contains(&0) {
            return Err(Error::InvalidArgument("levels are 1-based".into()));
        }
        Ok(TransferSchedule {
            name: ScheduleName::Custom,
            levels,
        })
    }

    /// Every level of a layout, which replaces the whole code when the chunks
    /// cover it.
    pub fn all(layout: &LatentLayout) -> Result<Self> {
        Self::custom(1..=layout.chunks.len())
    }

    pub fn check(&self, layout: &LatentLayout) -> Result<()> {
        let count = layout.chunks.len();
        match self.levels.iter().find(|&&l| l == 0 || l > count) {
            Some(l) => Err(Error::InvalidArgument(format!(
                "schedule level {l} outside 1..={count}"
            ))),
            None if self.levels.is_empty() => {
                Err(Error::InvalidArgument("schedule needs at least one level".into()))
            }
            None => Ok(()),
        }
    }
}

/// The named presets: pose copies level 1, color levels 4 to 6, texture levels
/// 3 to 5.
pub fn preset_schedule(name: &str) -> Result<TransferSchedule> {
    let (name, levels): (_, &[usize]) = match name.parse()? {
        ScheduleName::Pose => (ScheduleName::Pose, &[1]),
        ScheduleName::Color => (ScheduleName::Color, &[4, 5, 6]),
        ScheduleName::Texture => (ScheduleName::Texture, &[3, 4, 5]),
        ScheduleName::Custom => {
            return Err(Error::InvalidArgument(
                "`custom` is not a preset, pass explicit levels".into(),
            ))
        }
    };
    Ok(TransferSchedule {
        name,
        levels: levels.iter().copied().collect(),
    })
}

/// `z_src` with the scheduled chunks overwritten by `z_tgt`'s values.
pub fn swap_chunks(
    z_src: &DVector<f64>,
    z_tgt: &DVector<f64>,
    schedule: &TransferSchedule,
    layout: &LatentLayout,
) -> Result<DVector<f64>> {
    for (name, z) in [("source", z_src), ("target", z_tgt)] {
        if z.len() != layout.latent_dim {
            return Err(Error::DimensionMismatch(format!(
                "{name} latent has length {}, layout expects {}",
                z.len(),
                layout.latent_dim
            )));
        }
    }
    schedule.check(layout)?;
    let mut out = z_src.clone();
    for &level in &schedule.levels {
        let r = layout.chunk(level)?.range();
        out.rows_mut(r.start, r.len()).copy_from(&z_tgt.rows(r.start, r.len()));
    }
    Ok(out)
}

/// A latent code plus the class label a conditional generator would consume.
/// The label is opaque here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledLatent {
    #[serde(skip)]
    pub z: DVector<f64>,
    pub class: Option<i64>,
}

/// Chunk swap that optionally carries the target's class label along.
pub fn swap_labeled(
    src: &LabeledLatent,
    tgt: &LabeledLatent,
    schedule: &TransferSchedule,
    layout: &LatentLayout,
    swap_class: bool,
) -> Result<LabeledLatent> {
    Ok(LabeledLatent {
        z: swap_chunks(&src.z, &tgt.z, schedule, layout)?,
        class: if swap_class { tgt.class } else { src.class },
    })
}
