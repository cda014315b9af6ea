pub mod action;
pub mod cli;
pub mod numerics;
pub mod oracle;
pub mod potential;
pub mod quantize;
pub mod stokes;
pub mod turning;
pub mod verify;
