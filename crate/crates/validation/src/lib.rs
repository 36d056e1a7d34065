//! Holds the `acceptance` test target, which runs the physics acceptance
//! criteria against `nhssh-core` and prints one PASS/FAIL line each.
