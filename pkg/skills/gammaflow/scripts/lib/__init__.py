# gammaflow library modules
