//! Compiles and runs the guide's code snippets as doc-tests.
