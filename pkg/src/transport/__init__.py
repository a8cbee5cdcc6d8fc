# Entropic transport and barycenters
