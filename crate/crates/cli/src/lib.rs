//! Support code for the `linweb` command line tool.

pub mod selftest;
