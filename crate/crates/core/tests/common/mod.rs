#![allow(dead_code)]

pub mod mc;
pub mod shadow;
pub mod synthetic;
