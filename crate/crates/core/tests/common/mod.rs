// each test target uses a different slice of these helpers
#![allow(dead_code)]

pub mod checks;
pub mod shadow;
pub mod symbolic;
