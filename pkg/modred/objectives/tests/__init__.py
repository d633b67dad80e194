# objectives tests
