use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegratorKind {
    Mega,
    Wave,
    WaveNocompact,
}

impl IntegratorKind {
    pub const ALL: [IntegratorKind; 3] = [
        IntegratorKind::Mega,
        IntegratorKind::WaveNocompact,
        IntegratorKind::Wave,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IntegratorKind::Mega => "mega",
            IntegratorKind::Wave => "wave",
            IntegratorKind::WaveNocompact => "wave-nocompact",
        }
    }
}

impl fmt::Display for IntegratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IntegratorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mega" => Ok(IntegratorKind::Mega),
            "wave" => Ok(IntegratorKind::Wave),
            "wave-nocompact" => Ok(IntegratorKind::WaveNocompact),
            other => Err(format!(
                "unknown integrator '{other}' (expected mega, wave or wave-nocompact)"
            )),
        }
    }
}

/// How the wavefront compaction stage orders surviving path indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompactionMode {
    /// Count, exclusive scan, scatter. Survivors keep ascending order.
    #[default]
    Deterministic,
    /// Shared atomic append cursor. Survivor order depends on scheduling.
    Atomic,
}

/// Transport and scheduling parameters shared by every integrator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub spp: u32,
    /// Maximum number of intersection events per path.
    pub max_depth: u32,
    pub seed: u64,
    pub nee: bool,
    pub russian_roulette: bool,
    pub workers: usize,
    /// Work items per dispatched group in the wavefront pipeline.
    pub group_size: u32,
    /// Lane-group width for the occupancy model.
    pub warp_size: usize,
    pub compaction: CompactionMode,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            spp: 16,
            max_depth: 5,
            seed: 0,
            nee: false,
            russian_roulette: true,
            workers: 1,
            group_size: 64,
            warp_size: 32,
            compaction: CompactionMode::Deterministic,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.spp == 0 {
            return Err("spp must be at least 1".into());
        }
        if self.max_depth == 0 {
            return Err("max depth must be at least 1".into());
        }
        if self.workers == 0 {
            return Err("workers must be at least 1".into());
        }
        if self.group_size == 0 || self.warp_size == 0 {
            return Err("group and warp sizes must be at least 1".into());
        }
        Ok(())
    }
}
