# mae1d tests
