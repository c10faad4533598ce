# molga - SELFIES genetic algorithm with a discriminator penalty
