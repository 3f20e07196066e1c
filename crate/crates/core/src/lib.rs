//! Simulator and library for encountered-type haptic rendering with a robot
//! arm carrying a three-point shape display.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arm;
pub mod contact;
pub mod controller;
pub mod geometry;
pub mod harness;
pub mod plant;
pub mod shape_display;
pub mod tracking;
pub mod twin;
