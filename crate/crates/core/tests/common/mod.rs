#![allow(dead_code)]

pub mod checks;
pub mod datalog;
pub mod gen;
pub mod semantics;
