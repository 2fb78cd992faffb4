//! Hosts the `acceptance` test target. Run it with
//! `cargo test -p gug-verify --test acceptance`.
