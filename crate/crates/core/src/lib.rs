pub mod error;
pub mod linalg;
pub mod report;
pub mod stein;
pub mod lyap;
pub mod dare;
pub mod care;
pub mod nme;
pub mod oracle;
pub mod harness;
