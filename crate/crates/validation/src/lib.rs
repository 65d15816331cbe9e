//! Home of the `acceptance` test target.
