pub mod acceptance;
pub mod asymptotics;
pub mod banded;
pub mod cli;
pub mod continuation;
pub mod error;
pub mod fem;
pub mod harmonics;
pub mod io;
pub mod mesh;
pub mod ode;
pub mod params;
pub mod radial;
pub mod scan;
pub mod spectral;
