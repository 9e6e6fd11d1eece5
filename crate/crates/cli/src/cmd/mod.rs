//! One module per subcommand; each validates, writes into `--out`, and
//! reports per-series failures without aborting the batch.

pub mod evaluate;
pub mod features;
pub mod forecast;
pub mod generate;
pub mod train;
