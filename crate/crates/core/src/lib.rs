pub mod dynamics;
pub mod equilibria;
pub mod exact;
pub mod model;
pub mod multiscale;
pub mod statistics;
pub mod structural;
pub mod study;
pub mod symbolic;
