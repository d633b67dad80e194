# modred repository-level tests
