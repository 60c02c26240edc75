pub mod io;
pub mod linalg;
pub mod profile;
pub mod spectra;
pub mod symplectic;
pub mod resolvent;
pub mod flow;
pub mod damped_wave;
pub mod acceptance;
