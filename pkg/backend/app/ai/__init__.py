# Discriminator package
