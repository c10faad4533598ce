# Chemistry package
