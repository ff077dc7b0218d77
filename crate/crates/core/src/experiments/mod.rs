//! Teacher–student experiments on the random-feature model.
//!
//! Every sweep is a set of independent (ψ1, trial) tasks, each with its own
//! random stream derived from the master seed, so tables are reproducible
//! bit for bit and do not depend on scheduling.

mod huber;
mod peaks;
mod streams;
mod sweep;
mod teacher;

pub use huber::{huber_contaminate, HuberCorruption};
pub use peaks::{contamination_envelope_curves, peak_report, EnvelopePeaks, EnvelopeRow, EnvelopeTable, PeakReport};
pub use streams::stream;
pub use sweep::{
    bias_variance_on, bias_variance_sweep, bias_variance_sweep_with, misspecification_on, misspecification_sweep,
    misspecification_sweep_with, Execution, MisspecRow, SweepConfig, SweepFixture, SweepRow,
};
pub use teacher::{generate_teacher_data, Teacher, TeacherConfig, TeacherKind};
