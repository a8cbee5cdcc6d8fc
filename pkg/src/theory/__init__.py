# Exact checks on tiny partition spaces
