pub mod decide;
pub mod formula;
pub mod kripke;
pub mod model;
pub mod partition;
pub mod pointset;
pub mod proofsys;
pub mod random;
pub mod schemes;
pub mod tautology;
