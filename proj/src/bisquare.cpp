// Implementation unit for robsur/bisquare.
