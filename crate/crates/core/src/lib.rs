pub mod adapt;
pub mod eesm;
pub mod fading;
pub mod phy;
