"""Report generators: result tables, line plots and saliency images."""
