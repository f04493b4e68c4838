import java.util.List;

/** Sums the discounted amount of every active invoice row. */
public final class InvoiceTotals {
    private InvoiceTotals() {}

    public enum Discount { NONE, STANDARD, PREMIUM }

    public record Row(double price, int quantity, boolean active) {
        static Row parse(String[] fields) {
            boolean active = fields.length > 3 && fields[3].equals("Y");
            double price = active ? Double.parseDouble(fields[1]) : 0;
            int quantity = active ? Integer.parseInt(fields[2]) : 0;
            return new Row(price, quantity, active);
        }

        double amount() {
            return price * quantity;
        }
    }

    public static double total(List<String[]> rawRows, Discount discount) {
        return rawRows.stream()
                .map(Row::parse)
                .filter(Row::active)
                .mapToDouble(row -> discounted(row.amount(), discount))
                .sum();
    }

    static double discounted(double amount, Discount discount) {
        return switch (discount) {
            case STANDARD -> amount * 0.90;
            case PREMIUM -> amount * 0.85;
            case NONE -> amount > 100 ? amount - 5 : amount;
        };
    }
}
