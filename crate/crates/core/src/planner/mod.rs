//! Incremental view selection: initial split, per-round retraining and
//! scoring, and the Random / farthest-view baselines.

mod run;
mod split;
mod trace;

pub use run::{
    evaluate_views, run_incremental, run_incremental_with, select_next, selection_budget, PlannerConfig, Selection,
    SelectionState, WeightMode,
};
pub use split::{init_split, Split};
pub use trace::{read_trace, write_trace, RoundRecord, TRACE_HEADER};

use serde::{Deserialize, Serialize};

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Hybrid,
    RenderingOnly,
    PositionalOnly,
    Random,
    Fvs,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::Hybrid,
        StrategyKind::RenderingOnly,
        StrategyKind::PositionalOnly,
        StrategyKind::Random,
        StrategyKind::Fvs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Hybrid => "hybrid",
            StrategyKind::RenderingOnly => "rendering_only",
            StrategyKind::PositionalOnly => "positional_only",
            StrategyKind::Random => "random",
            StrategyKind::Fvs => "fvs",
        }
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::invalid(format!("unknown strategy {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strategy {
    pub kind: StrategyKind,
    pub seed: u64,
}
