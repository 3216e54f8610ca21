//! Holds the `acceptance` test target; see `tests/acceptance.rs`.
//! Run it with `cargo test -p tfheat-validation --test acceptance`;
//! arguments `1`..`9` select individual criteria.
