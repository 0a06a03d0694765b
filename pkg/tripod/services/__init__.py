"""Services package for the physics model, integrators, dressed states, Doppler averaging and sweeps."""
