//! Monte Carlo BER experiments over the rank, the SNR and the number of
//! received symbols, with CSV and SVG output.

mod config;
mod csv;
mod plot;
mod runner;

pub use config::{ExperimentConfig, Scheme};
pub use csv::{format_sig9, parse_csv, read_csv, to_csv_string, write_csv, CSV_HEADER};
pub use plot::{emit_plot, render_svg, BER_FLOOR};
pub use runner::{
    convergence_curve, run_grid, run_packet, run_seed, sweep_rank, sweep_snr, BerCurve, BerPoint, Job, Packet,
    PacketOutcome,
};
