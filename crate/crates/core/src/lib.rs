//! Natural-language questions to physical plans over a spatio-temporal database.

pub mod catalog;
pub mod corpus;
pub mod eval;
pub mod nlu;
pub mod optimizer;
pub mod pipeline;
pub mod plan;
pub mod value;
