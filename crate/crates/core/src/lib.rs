pub mod bounds;
pub mod distributions;
pub mod expcli;
pub mod grid;
pub mod montecarlo;
pub mod sum;
pub mod trimming;
