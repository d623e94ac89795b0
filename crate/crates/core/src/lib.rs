pub mod logic;
pub mod policy;
pub mod labels;
pub mod compiler;
pub mod pdp;
pub mod route;
pub mod bindings;
pub mod runtime;
pub mod verifier;
