# Run store: session model and run.json persistence
