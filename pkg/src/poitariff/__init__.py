"""POI two-part tariff model: user equilibrium, venue response and app tariff design."""
