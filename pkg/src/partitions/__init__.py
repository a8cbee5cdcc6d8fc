# Partitions and posteriors over partitions
