//! Gear-train configuration synthesis.
//!
//! A gear train is a token sequence over a parts lexicon. This crate holds
//! the grammar that decides which sequences are buildable, a kinematic
//! simulator that computes speed ratio, output position and motion of a
//! sequence, an interference check, a dataset generator, evaluation
//! metrics, and search methods (bi-gram EDA and MCTS, optionally completed
//! by an external sequence model).

pub mod catalogue;
pub mod datasetgen;
pub mod dsl;
pub mod feasibility;
pub mod geometry;
pub mod metrics;
pub mod search;
pub mod simulator;

pub use catalogue::{load_catalogue, shaft_weight, Catalogue, CatalogueError, ComponentType, PartId, PartRecord};
pub use dsl::{GearSequence, Grammar, GrammarViolation, Token};
pub use feasibility::{boxes_intersect, check_interference, Aabb, Interference};
pub use geometry::{Axis, Sign};
pub use simulator::{simulate, FrameState, MotionType, Placement, SimError, SimResult};
pub use datasetgen::{encode_requirements, DatasetConfig, DatasetError, DatasetRecord, Manifest, Requirements};
pub use metrics::{evaluate_set, rmsle, EvalReport, MetricsError};
pub use search::{eda_search, mcts_search, random_search, ucb, Completer, FitnessWeights, SearchConfig, SearchError, SearchOutcome};
