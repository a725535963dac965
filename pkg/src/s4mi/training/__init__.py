"""Training package: losses, schedules and the segmentation, self-supervised and clustering trainers."""
