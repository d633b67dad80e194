# evalkit tests
