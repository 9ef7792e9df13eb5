//! Holds the `acceptance` test target. Run it with
//! `cargo test -p abloc-validation --test acceptance`.
