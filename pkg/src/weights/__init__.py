# Barycenter weight schemes
