//! Library side of the `ccbs` command: input loading, result records and
//! the batch runner. `main.rs` only parses flags and maps outcomes to exit
//! codes.

pub mod batch;
pub mod input;
pub mod output;

pub use batch::{run_batch, summarize, BatchJob, ConfigSummary};
pub use input::{parse_list, parse_open, parse_seeds, Source};
pub use output::{write_records, write_solution, Format, Record};
