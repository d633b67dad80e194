# numcore tests
