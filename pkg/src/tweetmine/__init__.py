"""Topic mining of health-related social-media messages with survey comparison."""
