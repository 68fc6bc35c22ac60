pub mod antiinv;
pub mod catalog;
pub mod cli;
pub mod contact;
pub mod document;
pub mod expr;
pub mod geometry;
pub mod linalg;
pub mod submersion;
