# disttrain tests
