# datapipe tests
