# Run service
