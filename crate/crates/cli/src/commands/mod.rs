mod dml;
mod explain;
mod inspect;
mod prune;
mod report;
mod synth;
mod train;

pub use dml::dml;
pub use explain::explain;
pub use inspect::inspect;
pub use prune::prune;
pub use report::{report, verify};
pub use synth::synth;
pub use train::train;
